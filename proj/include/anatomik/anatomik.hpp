#pragma once

#include "anatomik/analysis.hpp"
#include "anatomik/io.hpp"
#include "anatomik/lifter.hpp"
#include "anatomik/losses.hpp"
#include "anatomik/metrics.hpp"
#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"
#include "anatomik/skeleton_fit.hpp"
#include "anatomik/synth.hpp"
#include "anatomik/tpnet.hpp"
