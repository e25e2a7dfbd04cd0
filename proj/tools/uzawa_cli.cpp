#include "cli_app.hpp"

int main(int argc, char** argv) { return uzawa::cli::run(argc, argv); }
