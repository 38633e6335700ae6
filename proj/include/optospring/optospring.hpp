#pragma once

#include "optospring/constants.hpp"
#include "optospring/errors.hpp"
#include "optospring/format.hpp"
#include "optospring/model.hpp"
#include "optospring/spring.hpp"
#include "optospring/experiment.hpp"
#include "optospring/stability.hpp"
#include "optospring/response.hpp"
#include "optospring/thermal.hpp"
#include "optospring/timesim.hpp"
#include "optospring/presets.hpp"
#include "optospring/config_io.hpp"
#include "optospring/csv.hpp"
