#pragma once

#include "caplab/errors.hpp"
#include "caplab/model.hpp"
#include "caplab/brownian.hpp"
#include "caplab/integrators.hpp"
#include "caplab/analysis.hpp"
#include "caplab/io.hpp"
#include "caplab/config.hpp"
