#include "gfss/cli/commands.hpp"

int main(int argc, char** argv) { return gfss::cli::run(argc, argv); }
