// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vesselgcn/cli.hpp"

int main(int argc, char** argv) { return vesselgcn::cli::run(argc, argv); }
