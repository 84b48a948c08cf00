#include "pcetl/cli.hpp"

int main(int argc, char** argv) { return pcetl::run_cli(argc, argv); }
