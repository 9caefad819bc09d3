#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "losstomo/bitvector.hpp"
#include "losstomo/tree_model.hpp"

namespace losstomo {

// Receiver-visible outcome of an experiment: y_j^i = 1 iff probe i was
// observed at receiver j. Stored column-wise, one packed bit vector per
// receiver.
class ObservationMatrix {
 public:
  ObservationMatrix(std::size_t probes, std::vector<NodeId> receiver_ids, std::vector<BitVector> columns);
  // rows[i][c] is the bit of probe i at receiver column c. Any non-zero
  // byte counts as 1.
  static ObservationMatrix from_rows(std::vector<NodeId> receiver_ids,
                                     const std::vector<std::vector<std::uint8_t>>& rows);

  std::size_t probe_count() const noexcept { return probes_; }
  const std::vector<NodeId>& receiver_ids() const noexcept { return receivers_; }
  std::size_t receiver_count() const noexcept { return receivers_.size(); }

  bool at(std::size_t probe, std::size_t column) const { return columns_.at(column).test(probe); }
  const BitVector& column(std::size_t c) const { return columns_.at(c); }
  const BitVector& column_of(NodeId receiver) const;

  friend bool operator==(const ObservationMatrix&, const ObservationMatrix&) = default;

 private:
  std::size_t probes_;
  std::vector<NodeId> receivers_;
  std::vector<BitVector> columns_;
};

// Full (hidden) state: x_k^i = 1 iff probe i reached node k.
class HiddenState {
 public:
  explicit HiddenState(std::vector<BitVector> reached) : reached_(std::move(reached)) {}

  std::size_t node_count() const noexcept { return reached_.size(); }
  bool reached(std::size_t probe, NodeId k) const { return reached_.at(k).test(probe); }
  const BitVector& node(NodeId k) const { return reached_.at(k); }

 private:
  std::vector<BitVector> reached_;
};

struct SimulationResult {
  ObservationMatrix observations;
  std::optional<HiddenState> hidden;
};

struct SimulateOptions {
  bool keep_hidden = false;
  // 0 means worker_count().
  std::size_t threads = 0;
};

// Probes are generated in blocks of kProbeBlock consecutive indices. Block b
// draws from a std::mt19937_64 seeded with splitmix64(seed + (b + 1) * golden)
// where golden = 0x9E3779B97F4A7C15, so the output does not depend on the
// number of workers. Within a probe, links are visited in preorder and a
// uniform u = (draw >> 11) * 2^-53 is consumed only for links whose parent
// was reached; the link passes when u < alpha.
inline constexpr std::size_t kProbeBlock = 1024;

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block) noexcept;

// Monte-Carlo replication r of a run seeded with `seed` uses seed + r.
constexpr std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t r) noexcept { return seed + r; }

SimulationResult simulate(const Tree& tree, const LossModel& model, std::size_t probes, std::uint64_t seed,
                          const SimulateOptions& options = {});

// Exact distribution of receiver patterns, by enumerating every pass/fail
// configuration of the links. Pattern bit c is receiver column c.
struct OutcomeDistribution {
  std::vector<NodeId> receiver_ids;
  std::map<std::uint64_t, double> probability;
};

inline constexpr std::size_t kEnumerationLinkCap = 24;

// Throws CapacityError above kEnumerationLinkCap links.
OutcomeDistribution exact_outcome_distribution(const Tree& tree, const LossModel& model);

// Observation dump, CSV:
//   n,<probe count>
//   receivers,<id>,<id>,...
//   one row per probe of comma-separated 0/1 in receiver order
void write_observations(std::ostream& out, const ObservationMatrix& obs);
ObservationMatrix read_observations(std::istream& in);
void save_observations(const std::string& path, const ObservationMatrix& obs);
ObservationMatrix load_observations(const std::string& path);

}  // namespace losstomo
