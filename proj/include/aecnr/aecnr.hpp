#pragma once

// Umbrella header for the core library.

#include "aecnr/linalg.hpp"
#include "aecnr/rng.hpp"
#include "aecnr/stft.hpp"
#include "aecnr/room.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/filter_bank.hpp"
#include "aecnr/bussgang.hpp"
#include "aecnr/steering.hpp"
#include "aecnr/geic.hpp"
#include "aecnr/mwf.hpp"
#include "aecnr/decomposition.hpp"
#include "aecnr/metrics.hpp"
#include "aecnr/wav.hpp"
#include "aecnr/bench/config.hpp"
#include "aecnr/bench/results.hpp"
#include "aecnr/bench/runner.hpp"
