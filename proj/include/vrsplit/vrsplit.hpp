/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VRSPLIT_VRSPLIT_HPP
#define VRSPLIT_VRSPLIT_HPP

#include "vrsplit/adam.hpp"
#include "vrsplit/checkpoint.hpp"
#include "vrsplit/exact.hpp"
#include "vrsplit/experiment.hpp"
#include "vrsplit/infer.hpp"
#include "vrsplit/json_io.hpp"
#include "vrsplit/model.hpp"
#include "vrsplit/nn.hpp"
#include "vrsplit/rng.hpp"
#include "vrsplit/tensor.hpp"
#include "vrsplit/topology.hpp"
#include "vrsplit/train.hpp"
#include "vrsplit/types.hpp"

#endif  // VRSPLIT_VRSPLIT_HPP
