#pragma once

#include "msvc/bench.hpp"
#include "msvc/clock.hpp"
#include "msvc/engine.hpp"
#include "msvc/errors.hpp"
#include "msvc/http_model.hpp"
#include "msvc/mockserver.hpp"
#include "msvc/reliability.hpp"
#include "msvc/services.hpp"
#include "msvc/table.hpp"
#include "msvc/transformer.hpp"
#include "msvc/transport.hpp"
#include "msvc/util.hpp"
#include "msvc/value.hpp"
