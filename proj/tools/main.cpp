#include "fedsense/harness.hpp"

int main(int argc, char** argv) { return fedsense::harness::cli_main(argc, argv); }
