#include <iostream>

#include "clockrand/commands.hpp"

int main(int argc, char** argv) { return clockrand::run_cli(argc, argv, std::cout, std::cerr); }
