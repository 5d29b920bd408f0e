#pragma once

#include "conlearn/models/mlp.hpp"
#include "conlearn/models/output.hpp"
#include "conlearn/models/seq2seq.hpp"
#include "conlearn/models/tagger.hpp"
#include "conlearn/models/vocab.hpp"
