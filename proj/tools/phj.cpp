#include "phj/cli_io.hpp"

int main(int argc, char** argv) { return phj::cli::run(argc, argv); }
