#pragma once

// Umbrella header for the whole library.

#include "textae/autoencoder.hpp"
#include "textae/classifiers.hpp"
#include "textae/corpus.hpp"
#include "textae/error.hpp"
#include "textae/eval.hpp"
#include "textae/infoplane.hpp"
#include "textae/matrix.hpp"
#include "textae/pca.hpp"
#include "textae/pipeline.hpp"
#include "textae/rng.hpp"
#include "textae/textio.hpp"
#include "textae/tfidf.hpp"
