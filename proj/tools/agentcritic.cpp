#include <iostream>

#include "agentcritic/cli.hpp"

int main(int argc, char** argv) { return agentcritic::cli::run_cli(argc, argv, std::cout, std::cerr); }
