#pragma once

#include "wristhap/actuation.hpp"
#include "wristhap/effects.hpp"
#include "wristhap/errors.hpp"
#include "wristhap/geometry.hpp"
#include "wristhap/protocol.hpp"
#include "wristhap/renderer.hpp"
#include "wristhap/scenario_config.hpp"
#include "wristhap/session.hpp"
#include "wristhap/statics.hpp"
#include "wristhap/trace_io.hpp"
