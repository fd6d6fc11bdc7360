BLUE_C = "#58C4DD"
GREEN_C = "#83C167"
PURPLE_C = "#9A72AC"
ORANGE = "#FF862F"
GREY_D = "#444444"
GREY_C = "#888888"
GREY_A = "#DDDDDD"
WHITE = "#FFFFFF"

BLUE = BLUE_C
GREEN = GREEN_C
PURPLE = PURPLE_C
GREY = GREY_C

# one marker colour per baseline arm in scatter plots
BASELINE_COLORS = {
    'csp-lda': BLUE,
    'csp-svm': GREEN,
    'ccsp-lda': ORANGE,
    'ccsp-svm': PURPLE,
}
