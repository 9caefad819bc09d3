#include "losstomo/probe_simulator.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "losstomo/errors.hpp"
#include "losstomo/parallel.hpp"

namespace losstomo {

ObservationMatrix::ObservationMatrix(std::size_t probes, std::vector<NodeId> receiver_ids,
                                     std::vector<BitVector> columns)
    : probes_(probes), receivers_(std::move(receiver_ids)), columns_(std::move(columns)) {
  if (columns_.size() != receivers_.size())
    throw ConfigError("observation matrix: column count does not match receiver count");
  for (const auto& c : columns_)
    if (c.size() != probes_) throw ConfigError("observation matrix: ragged column");
}

ObservationMatrix ObservationMatrix::from_rows(std::vector<NodeId> receiver_ids,
                                               const std::vector<std::vector<std::uint8_t>>& rows) {
  std::vector<BitVector> columns(receiver_ids.size(), BitVector(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != receiver_ids.size())
      throw ConfigError("observation row " + std::to_string(i + 1) + " has the wrong width");
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      if (rows[i][c] != 0) columns[c].set(i);
  }
  return ObservationMatrix(rows.size(), std::move(receiver_ids), std::move(columns));
}

const BitVector& ObservationMatrix::column_of(NodeId receiver) const {
  const auto it = std::find(receivers_.begin(), receivers_.end(), receiver);
  if (it == receivers_.end()) throw std::out_of_range("no column for receiver " + std::to_string(receiver));
  return columns_[static_cast<std::size_t>(it - receivers_.begin())];
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block) noexcept {
  return splitmix64(seed + (block + 1) * kGolden);
}

SimulationResult simulate(const Tree& tree, const LossModel& model, std::size_t probes, std::uint64_t seed,
                          const SimulateOptions& options) {
  if (probes == 0) throw ConfigError("probe count must be at least 1");
  if (model.link_count() != tree.link_count()) throw ConfigError("loss model does not cover the tree");

  const std::size_t nodes = tree.node_count();
  std::vector<BitVector> reached(nodes, BitVector(probes));
  const auto& order = tree.preorder();
  std::vector<NodeId> parent(nodes, 0);
  for (NodeId k = 1; k < nodes; ++k) parent[k] = tree.parent(k);
  const auto& alpha = model.pass_rates();

  const std::size_t blocks = (probes + kProbeBlock - 1) / kProbeBlock;
  const std::size_t workers = options.threads == 0 ? worker_count() : options.threads;

  // Blocks are multiples of 64 probes, so workers never share a word.
  static_assert(kProbeBlock % BitVector::kWordBits == 0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    std::mt19937_64 rng(block_seed(seed, b));
    std::vector<std::uint8_t> state(nodes, 0);
    state[0] = 1;
    const std::size_t first = b * kProbeBlock;
    const std::size_t last = std::min(probes, first + kProbeBlock);
    for (std::size_t i = first; i < last; ++i) {
      for (NodeId k : order) {
        if (k == 0) continue;
        if (state[parent[k]] == 0) {
          state[k] = 0;
          continue;
        }
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        state[k] = u < alpha[k] ? 1 : 0;
      }
      for (NodeId k = 0; k < nodes; ++k)
        if (state[k] != 0) reached[k].set(i);
    }
  });

  std::vector<BitVector> columns;
  columns.reserve(tree.receivers().size());
  for (NodeId r : tree.receivers()) columns.push_back(reached[r]);
  SimulationResult result{ObservationMatrix(probes, tree.receivers(), std::move(columns)), std::nullopt};
  if (options.keep_hidden) result.hidden.emplace(std::move(reached));
  return result;
}

OutcomeDistribution exact_outcome_distribution(const Tree& tree, const LossModel& model) {
  const std::size_t links = tree.link_count();
  if (links > kEnumerationLinkCap)
    throw CapacityError("exact enumeration over " + std::to_string(links) + " links exceeds the cap of " +
                        std::to_string(kEnumerationLinkCap));

  const auto& order = tree.preorder();
  const std::size_t nodes = tree.node_count();
  std::vector<NodeId> parent(nodes, 0);
  for (NodeId k = 1; k < nodes; ++k) parent[k] = tree.parent(k);

  OutcomeDistribution dist;
  dist.receiver_ids = tree.receivers();
  std::vector<std::uint8_t> state(nodes, 0);
  state[0] = 1;
  const std::uint64_t configs = std::uint64_t{1} << links;
  for (std::uint64_t cfg = 0; cfg < configs; ++cfg) {
    // bit (k - 1) of cfg: link k passes
    double p = 1.0;
    for (NodeId k = 1; k < nodes; ++k) {
      const double a = model.pass_rate(k);
      p *= ((cfg >> (k - 1)) & 1U) ? a : 1.0 - a;
    }
    if (p == 0.0) continue;
    for (NodeId k : order)
      if (k != 0) state[k] = state[parent[k]] & static_cast<std::uint8_t>((cfg >> (k - 1)) & 1U);
    std::uint64_t pattern = 0;
    for (std::size_t c = 0; c < dist.receiver_ids.size(); ++c)
      if (state[dist.receiver_ids[c]] != 0) pattern |= std::uint64_t{1} << c;
    dist.probability[pattern] += p;
  }
  return dist;
}

void write_observations(std::ostream& out, const ObservationMatrix& obs) {
  out << "n," << obs.probe_count() << '\n' << "receivers";
  for (NodeId r : obs.receiver_ids()) out << ',' << r;
  out << '\n';
  std::string row;
  for (std::size_t i = 0; i < obs.probe_count(); ++i) {
    row.clear();
    for (std::size_t c = 0; c < obs.receiver_count(); ++c) {
      if (c != 0) row += ',';
      row += obs.at(i, c) ? '1' : '0';
    }
    row += '\n';
    out << row;
  }
}

ObservationMatrix read_observations(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
  };

  if (!next_line()) throw ParseError(0, "observation dump is empty");
  auto head = split(line);
  std::size_t probes = 0;
  try {
    if (head.size() != 2 || head[0] != "n") throw std::invalid_argument("header");
    probes = std::stoull(head[1]);
  } catch (const std::exception&) {
    throw ParseError(line_no, "expected 'n,<probe count>'");
  }
  if (probes == 0) throw ParseError(line_no, "probe count must be at least 1");
  if (!next_line()) throw ParseError(line_no, "missing receivers line");
  auto ids = split(line);
  if (ids.size() < 2 || ids[0] != "receivers") throw ParseError(line_no, "expected 'receivers,<id>,...'");
  std::vector<NodeId> receivers;
  try {
    for (std::size_t c = 1; c < ids.size(); ++c) receivers.push_back(static_cast<NodeId>(std::stoul(ids[c])));
  } catch (const std::exception&) {
    throw ParseError(line_no, "bad receiver id");
  }

  std::vector<BitVector> columns(receivers.size(), BitVector(probes));
  for (std::size_t i = 0; i < probes; ++i) {
    if (!next_line()) throw ParseError(line_no, "expected " + std::to_string(probes) + " rows, found " + std::to_string(i));
    const std::size_t width = receivers.size();
    if (line.size() != 2 * width - 1) throw ParseError(line_no, "row has the wrong width");
    for (std::size_t c = 0; c < width; ++c) {
      const char bit = line[2 * c];
      if ((bit != '0' && bit != '1') || (c + 1 < width && line[2 * c + 1] != ','))
        throw ParseError(line_no, "row entries must be 0 or 1");
      if (bit == '1') columns[c].set(i);
    }
  }
  if (next_line()) throw ParseError(line_no, "trailing data after " + std::to_string(probes) + " rows");
  return ObservationMatrix(probes, std::move(receivers), std::move(columns));
}

void save_observations(const std::string& path, const ObservationMatrix& obs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_observations(out, obs);
}

ObservationMatrix load_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation dump '" + path + "'");
  return read_observations(in);
}

}  // namespace losstomo
