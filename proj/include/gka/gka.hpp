#pragma once

#include "gka/attacks.hpp"
#include "gka/crypto.hpp"
#include "gka/errors.hpp"
#include "gka/gfpoly.hpp"
#include "gka/netsim.hpp"
#include "gka/protocol.hpp"
#include "gka/rng.hpp"
#include "gka/scenario.hpp"
#include "gka/scheme.hpp"
#include "gka/session.hpp"
