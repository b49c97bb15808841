#pragma once

/**
 * softseq: an exact, desk-scale laboratory for energy-based and
 * autoregressive sequence models over finite token spaces.
 *
 * Everything is computed in the log domain over an explicit prefix tree,
 * small enough to enumerate, so every quantity has a brute-force oracle.
 */

#include "softseq/arm.hpp"
#include "softseq/bijection.hpp"
#include "softseq/dist.hpp"
#include "softseq/ebm.hpp"
#include "softseq/errors.hpp"
#include "softseq/numeric.hpp"
#include "softseq/random.hpp"
#include "softseq/seqspace.hpp"
#include "softseq/serialize.hpp"
#include "softseq/table.hpp"
#include "softseq/train.hpp"
