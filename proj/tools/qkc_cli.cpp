#include "qkc/bench.hpp"

int main(int argc, char** argv) { return qkc::cli_main(argc, argv); }
