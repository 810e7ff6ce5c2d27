#include "cbct/harness/harness.hpp"

int main(int argc, char** argv) { return cbct::harness::run_cli(argc, argv); }
