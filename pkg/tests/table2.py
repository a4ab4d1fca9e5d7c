"""Published distances and ranks for the seven-author toy network (rho = APV)."""

# name: (netout, netout_rank, pathsim, pathsim_rank, cossim, cossim_rank)
TABLE2 = {
    "Sarah": (0.0, 6, 0.0, 6, 0.0, 6),
    "Rob": (0.9376, 2, 0.9, 4, 0.8757, 3),
    "Lucy": (0.6889, 3, 0.6721, 5, 0.6717, 4),
    "Joe": (0.0, 4, 0.9901, 1, 0.9296, 2),
    "Mikel": (0.0, 5, 0.9014, 3, 0.2964, 5),
    "Emma": (0.9667, 1, 0.9455, 2, 0.9296, 1),
}
METHOD_COLUMNS = {"netout": 0, "pathsim": 2, "cossim": 4}
TOLERANCE = 5e-4
QANET_ORDER = ("Joe", "Mikel", "Emma", "Rob", "Lucy", "Sarah")
