#include <iostream>

#include "mgsched/cli/app.hpp"

int main(int argc, char** argv) { return mgsched::cli::main_entry(argc, argv, std::cout, std::cerr); }
