#pragma once

// Umbrella header for the seq2vec library: SGNS item-embedding training over
// session corpora, next-event-prediction evaluation and grid search.

#include "seq2vec/corpus.hpp"
#include "seq2vec/eval.hpp"
#include "seq2vec/model_io.hpp"
#include "seq2vec/report.hpp"
#include "seq2vec/rng.hpp"
#include "seq2vec/sampling.hpp"
#include "seq2vec/search.hpp"
#include "seq2vec/sgns.hpp"
#include "seq2vec/sideinfo.hpp"
#include "seq2vec/synthetic.hpp"
