from mklbci.logger import log

log.setLevel('ERROR')
