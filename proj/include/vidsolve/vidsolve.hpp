// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "baselines.hpp"
#include "bridge.hpp"
#include "denoiser.hpp"
#include "io.hpp"
#include "krylov.hpp"
#include "metrics.hpp"
#include "op_grammar.hpp"
#include "operators.hpp"
#include "preprocess.hpp"
#include "sampler.hpp"
#include "schedule.hpp"
#include "synth.hpp"
#include "video.hpp"
