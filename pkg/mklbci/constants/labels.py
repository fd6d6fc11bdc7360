LEFT = 1
RIGHT = -1

LABELS = (LEFT, RIGHT)

N_FILTERS_PER_SIDE = 3
N_FILTERS = 2 * N_FILTERS_PER_SIDE
