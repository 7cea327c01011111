from .client import LoopbackTransport, StdioTransport, TcpTransport, ToolClient, TransportError
from .rpc import RpcError
from .runlog import RunLog, RunRecord
from .server import ToolServer, serve_stdio, serve_stream, serve_tcp
