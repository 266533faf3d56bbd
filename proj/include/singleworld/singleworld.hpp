#pragma once

#include "singleworld/errors.hpp"
#include "singleworld/rational.hpp"
#include "singleworld/graph.hpp"
#include "singleworld/dist.hpp"
#include "singleworld/separation.hpp"
#include "singleworld/swig.hpp"
#include "singleworld/report.hpp"
#include "singleworld/family.hpp"
#include "singleworld/decision.hpp"
