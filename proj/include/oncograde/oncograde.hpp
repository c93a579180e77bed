#ifndef ONCOGRADE_ONCOGRADE_HPP
#define ONCOGRADE_ONCOGRADE_HPP

#include "oncograde/core.hpp"
#include "oncograde/dataset.hpp"
#include "oncograde/eval.hpp"
#include "oncograde/models/model.hpp"
#include "oncograde/preprocess.hpp"
#include "oncograde/svg.hpp"

#endif  // ONCOGRADE_ONCOGRADE_HPP
