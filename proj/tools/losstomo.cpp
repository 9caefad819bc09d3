#include <iostream>

#include "losstomo/cli.hpp"

int main(int argc, char** argv) { return losstomo::cli::run(argc, argv, std::cout, std::cerr); }
