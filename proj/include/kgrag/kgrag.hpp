#pragma once

#include "kgrag/common.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/harness/metrics.hpp"
#include "kgrag/harness/pipeline.hpp"
#include "kgrag/harness/sweep.hpp"
#include "kgrag/importance.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/model.hpp"
#include "kgrag/phy/bits.hpp"
#include "kgrag/phy/channel.hpp"
#include "kgrag/phy/convolutional.hpp"
#include "kgrag/phy/frame.hpp"
#include "kgrag/phy/huffman.hpp"
#include "kgrag/phy/link.hpp"
#include "kgrag/phy/qam16.hpp"
#include "kgrag/prompts.hpp"
#include "kgrag/remote.hpp"
#include "kgrag/semgraph.hpp"
