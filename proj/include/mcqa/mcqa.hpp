#pragma once

#include "mcqa/answerability.hpp"
#include "mcqa/backends.hpp"
#include "mcqa/classifier_data.hpp"
#include "mcqa/config.hpp"
#include "mcqa/corpus.hpp"
#include "mcqa/error.hpp"
#include "mcqa/evaluation.hpp"
#include "mcqa/extraction.hpp"
#include "mcqa/generation.hpp"
#include "mcqa/normalize.hpp"
#include "mcqa/pipeline.hpp"
#include "mcqa/report.hpp"
#include "mcqa/sentences.hpp"
#include "mcqa/types.hpp"
#include "mcqa/util.hpp"
