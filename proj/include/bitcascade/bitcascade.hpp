#pragma once

#include "bitcascade/version.hpp"
#include "bitcascade/classes.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/rng.hpp"
#include "bitcascade/log.hpp"
#include "bitcascade/parallel.hpp"
#include "bitcascade/ingest.hpp"
#include "bitcascade/clustering.hpp"
#include "bitcascade/graph.hpp"
#include "bitcascade/motifs.hpp"
#include "bitcascade/features.hpp"
#include "bitcascade/ml/dataset.hpp"
#include "bitcascade/ml/tree.hpp"
#include "bitcascade/ml/ensemble.hpp"
#include "bitcascade/ml/model_io.hpp"
#include "bitcascade/eval.hpp"
#include "bitcascade/cascade.hpp"
#include "bitcascade/report.hpp"
#include "bitcascade/pipeline.hpp"
#include "bitcascade/synth.hpp"
