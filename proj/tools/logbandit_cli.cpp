#include <iostream>

#include "logbandit/harness.hpp"

int main(int argc, char** argv) { return logbandit::run_cli(argc, argv, std::cout, std::cerr); }
