#pragma once

#include <allspeed/errors.hpp>
#include <allspeed/state.hpp>
#include <allspeed/periodic_tridiagonal.hpp>
#include <allspeed/elliptic.hpp>
#include <allspeed/scheme1d.hpp>
#include <allspeed/scheme2d.hpp>
#include <allspeed/integrate.hpp>
#include <allspeed/diagnostics.hpp>
#include <allspeed/presets.hpp>
#include <allspeed/config.hpp>
#include <allspeed/runner.hpp>
