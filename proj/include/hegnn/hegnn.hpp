#pragma once

// Umbrella header: pulls in the full public API.

#include "hegnn/errors.hpp"
#include "hegnn/version.hpp"

#include "hegnn/he/params.hpp"
#include "hegnn/he/checks.hpp"
#include "hegnn/he/profile.hpp"
#include "hegnn/he/serial.hpp"
#include "hegnn/he/sim.hpp"
#include "hegnn/he/ckks/backend.hpp"
#include "hegnn/he/ops.hpp"

#include "hegnn/graph/types.hpp"
#include "hegnn/graph/io.hpp"
#include "hegnn/graph/encrypt.hpp"

#include "hegnn/importance.hpp"

#include "hegnn/engine/psets.hpp"
#include "hegnn/engine/engine.hpp"
#include "hegnn/engine/compact.hpp"

#include "hegnn/plain/forward.hpp"
#include "hegnn/plain/design.hpp"
#include "hegnn/plain/train.hpp"
