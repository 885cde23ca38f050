// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "trajfuse/ablation.hpp"
#include "trajfuse/adapter.hpp"
#include "trajfuse/analytic_env.hpp"
#include "trajfuse/basis_selection.hpp"
#include "trajfuse/config.hpp"
#include "trajfuse/dirichlet.hpp"
#include "trajfuse/environment.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/library_io.hpp"
#include "trajfuse/likert.hpp"
#include "trajfuse/metrics.hpp"
#include "trajfuse/optimizer.hpp"
#include "trajfuse/policy.hpp"
#include "trajfuse/random.hpp"
#include "trajfuse/special_functions.hpp"
#include "trajfuse/toy_sft.hpp"
#include "trajfuse/trainer.hpp"
