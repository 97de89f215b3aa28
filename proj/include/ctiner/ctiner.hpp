#pragma once

#include "ctiner/conll.hpp"
#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"
#include "ctiner/eval.hpp"
#include "ctiner/gateway.hpp"
#include "ctiner/heuristics.hpp"
#include "ctiner/merge.hpp"
#include "ctiner/pipeline.hpp"
#include "ctiner/utf8.hpp"
