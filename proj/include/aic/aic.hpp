#pragma once

#include "aic/error.hpp"
#include "aic/rng.hpp"
#include "aic/energy/capacitor.hpp"
#include "aic/energy/harvester.hpp"
#include "aic/energy/trace.hpp"
#include "aic/svm/anytime.hpp"
#include "aic/svm/coherence.hpp"
#include "aic/svm/model_io.hpp"
#include "aic/svm/train.hpp"
#include "aic/corner/harris.hpp"
#include "aic/corner/image.hpp"
#include "aic/runtime/engine.hpp"
#include "aic/runtime/log.hpp"
#include "aic/runtime/workload.hpp"
#include "aic/report/config.hpp"
#include "aic/report/metrics.hpp"
#include "aic/report/pipeline.hpp"
