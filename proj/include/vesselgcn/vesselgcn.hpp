// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_VESSELGCN_HPP
#define VESSELGCN_VESSELGCN_HPP

#include "vesselgcn/autodiff.hpp"
#include "vesselgcn/evaluation.hpp"
#include "vesselgcn/gradcheck.hpp"
#include "vesselgcn/graph.hpp"
#include "vesselgcn/io.hpp"
#include "vesselgcn/matrix.hpp"
#include "vesselgcn/model.hpp"
#include "vesselgcn/random.hpp"
#include "vesselgcn/synthetic.hpp"
#include "vesselgcn/training.hpp"

#endif  // VESSELGCN_VESSELGCN_HPP
