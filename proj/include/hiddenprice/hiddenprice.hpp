#pragma once

// Umbrella header for the hidden-price market-inefficiency model library.

#include "hiddenprice/types.hpp"
#include "hiddenprice/model.hpp"
#include "hiddenprice/spectrum.hpp"
#include "hiddenprice/likelihood.hpp"
#include "hiddenprice/inference.hpp"
#include "hiddenprice/estimation.hpp"
#include "hiddenprice/strategy.hpp"
#include "hiddenprice/data_io.hpp"
