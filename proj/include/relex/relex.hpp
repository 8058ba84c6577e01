#pragma once

#include "relex/ablation.hpp"
#include "relex/autograd.hpp"
#include "relex/checkpoint.hpp"
#include "relex/corpus.hpp"
#include "relex/encoder.hpp"
#include "relex/evaluation.hpp"
#include "relex/heads.hpp"
#include "relex/indicator.hpp"
#include "relex/label.hpp"
#include "relex/loss.hpp"
#include "relex/model.hpp"
#include "relex/optimizer.hpp"
#include "relex/pipeline.hpp"
#include "relex/random.hpp"
#include "relex/sequencing.hpp"
#include "relex/synthetic.hpp"
#include "relex/training.hpp"
#include "relex/vocab.hpp"
#include "relex/wordpiece.hpp"
