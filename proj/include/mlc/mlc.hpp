#pragma once

#include "mlc/bit_io.hpp"
#include "mlc/builtin_model.hpp"
#include "mlc/codec_epc.hpp"
#include "mlc/codec_pm.hpp"
#include "mlc/container.hpp"
#include "mlc/entropy/adaptive.hpp"
#include "mlc/entropy/freq_table.hpp"
#include "mlc/entropy/rans.hpp"
#include "mlc/error.hpp"
#include "mlc/extern_predictor.hpp"
#include "mlc/harness.hpp"
#include "mlc/metrics.hpp"
#include "mlc/patcher.hpp"
#include "mlc/payload.hpp"
#include "mlc/positions.hpp"
#include "mlc/predictor.hpp"
#include "mlc/protocol.hpp"
#include "mlc/rational.hpp"
#include "mlc/recon.hpp"
#include "mlc/residual.hpp"
#include "mlc/text.hpp"
