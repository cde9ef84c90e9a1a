#pragma once

#include "olm/errors.hpp"
#include "olm/grid.hpp"
#include "olm/itemset_miner.hpp"
#include "olm/localization.hpp"
#include "olm/metrics.hpp"
#include "olm/parts.hpp"
#include "olm/pgm.hpp"
#include "olm/pipeline.hpp"
#include "olm/tensor_store.hpp"
#include "olm/transactions.hpp"
