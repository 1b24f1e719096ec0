#pragma once

#include "qpt/analytic.hpp"
#include "qpt/core.hpp"
#include "qpt/errors.hpp"
#include "qpt/integrate.hpp"
#include "qpt/io.hpp"
#include "qpt/models.hpp"
#include "qpt/stability.hpp"
