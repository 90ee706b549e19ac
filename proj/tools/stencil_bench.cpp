// stencil_bench run|verify|plan: see --help.

#include <iostream>

#include "tstencil/harness.hpp"

int main(int argc, char** argv) { return tstencil::bench_main(argc, argv, std::cout, std::cerr); }
