// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "trajfuse/cli.hpp"

int main(int argc, char** argv) { return trajfuse::cli::run(argc, argv); }
