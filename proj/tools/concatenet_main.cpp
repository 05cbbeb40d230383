// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/cli.hpp"

int main(int argc, char** argv) { return concatenet::run_cli(argc, argv); }
