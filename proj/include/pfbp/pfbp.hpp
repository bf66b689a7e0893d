#pragma once

#include "pfbp/citest.hpp"
#include "pfbp/config.hpp"
#include "pfbp/data.hpp"
#include "pfbp/engine.hpp"
#include "pfbp/error.hpp"
#include "pfbp/experiments.hpp"
#include "pfbp/heuristics.hpp"
#include "pfbp/meta.hpp"
#include "pfbp/model.hpp"
#include "pfbp/report.hpp"
#include "pfbp/synth.hpp"
#include "pfbp/thread_pool.hpp"
#include "pfbp/version.hpp"
