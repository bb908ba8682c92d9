#include "cikf/cli.hpp"

int main(int argc, char** argv) { return cikf::run_command(argc, argv); }
