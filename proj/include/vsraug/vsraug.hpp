#pragma once

#include "vsraug/core.hpp"
#include "vsraug/noise_bank.hpp"
#include "vsraug/io.hpp"
#include "vsraug/noise_extract.hpp"
#include "vsraug/degrade.hpp"
#include "vsraug/negmix.hpp"
#include "vsraug/loss.hpp"
#include "vsraug/restorer.hpp"
#include "vsraug/metrics.hpp"
#include "vsraug/config.hpp"
#include "vsraug/synthetic.hpp"
#include "vsraug/pipeline.hpp"
