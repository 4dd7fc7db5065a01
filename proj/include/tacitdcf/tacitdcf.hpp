#pragma once

#include "tacitdcf/error.hpp"
#include "tacitdcf/eval/config.hpp"
#include "tacitdcf/eval/metrics.hpp"
#include "tacitdcf/eval/runner.hpp"
#include "tacitdcf/eval/sequence.hpp"
#include "tacitdcf/eval/synth.hpp"
#include "tacitdcf/features.hpp"
#include "tacitdcf/fft.hpp"
#include "tacitdcf/filter.hpp"
#include "tacitdcf/gram.hpp"
#include "tacitdcf/objective.hpp"
#include "tacitdcf/solver.hpp"
#include "tacitdcf/tfs_io.hpp"
#include "tacitdcf/tracker.hpp"
#include "tacitdcf/weights.hpp"
