#pragma once

// Umbrella header for the tensor kernel.
#include "votestack/nn/activations.hpp"
#include "votestack/nn/adam.hpp"
#include "votestack/nn/conv1d.hpp"
#include "votestack/nn/dense.hpp"
#include "votestack/nn/dropout.hpp"
#include "votestack/nn/gradcheck.hpp"
#include "votestack/nn/gru.hpp"
#include "votestack/nn/init.hpp"
#include "votestack/nn/lstm.hpp"
#include "votestack/nn/softmax.hpp"
#include "votestack/nn/types.hpp"
