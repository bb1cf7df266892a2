#include <iostream>

#include "qmoment/cli.hpp"

int main(int argc, char** argv) { return qmoment::cli::run_cli(argc, argv, std::cout, std::cerr); }
