from .client import ClientState, ClientWorker, evaluate, local_update, make_clients, train_local
from .fedavg import fedavg_run, weighted_mean_params
from .report import TrainReport
from .server import server_run
