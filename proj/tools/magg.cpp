#include "magg/cli.hpp"

int main(int argc, char** argv) { return magg::cli_dispatch(argc, argv); }
