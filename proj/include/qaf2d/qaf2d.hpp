#pragma once

// Umbrella header: 3D query anchors from 2D detections.

#include "qaf2d/anchor_generator.hpp"
#include "qaf2d/anchor_stats.hpp"
#include "qaf2d/errors.hpp"
#include "qaf2d/evaluator.hpp"
#include "qaf2d/geometry.hpp"
#include "qaf2d/prompt_layout.hpp"
#include "qaf2d/scene_simulator.hpp"
#include "qaf2d/set_matcher.hpp"

#define QAF2D_VERSION "0.1.0"
