# MPC simulator module
