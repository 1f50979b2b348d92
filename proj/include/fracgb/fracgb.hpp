#pragma once

#include "fracgb/errors.hpp"
#include "fracgb/families.hpp"
#include "fracgb/fpk.hpp"
#include "fracgb/grid.hpp"
#include "fracgb/gronwall.hpp"
#include "fracgb/sdesim.hpp"
#include "fracgb/singquad.hpp"
#include "fracgb/specialfn.hpp"
#include "fracgb/verify.hpp"
