#include "lgtm/cli.hpp"

int main(int argc, char** argv) { return lgtm::cli::run(argc, argv); }
