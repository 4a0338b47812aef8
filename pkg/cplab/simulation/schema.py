"""Define the JSON file formats of the scenario specifications."""

from ..formats import _add_attrib, _add_elem, new_root

NODE_KINDS = ('aloha', 'tdma', 'csma', 'fw_aloha', 'eb_aloha', 'agent',
              'aware')
CONTROLLERS = ('reno', 'vegas', 'agent')

# mac-v1
mac_root = new_root('mac-v1')
_add_attrib(mac_root, 'version', required=True, type=str,
            choices=('mac-v1',), help='Schema version.')
_add_attrib(mac_root, 'name', required=False, type=str, default=None,
            help='Scenario name used for run directories.')
_add_attrib(mac_root, 'frame_len', required=False, type=int, default=10,
            help='Slots per frame.')
_add_attrib(mac_root, 'total_frames', required=True, type=int,
            help='Horizon in frames.')
_add_attrib(mac_root, 'slot_duration', required=False, type=float,
            default=0.001, help='Slot length in seconds.')
_add_attrib(mac_root, 'seed', required=False, type=int, default=0,
            help='Scenario seed.')
node = _add_elem(mac_root, 'nodes', required=None,
                 help='A node of the population.')

_add_attrib(node, 'id', required=False, type=int, default=None,
            help='Node id; defaults to the list position.')
_add_attrib(node, 'kind', required=True, type=str, choices=NODE_KINDS,
            help='Protocol of the node.')
_add_attrib(node, 'q', required=False, type=float, default=None,
            help='ALOHA transmission probability.')
_add_attrib(node, 'slots', required=False, type=list, item=int, default=None,
            help='TDMA frame positions.')
_add_attrib(node, 'window', required=False, type=int, default=None,
            help='Backoff window W.')
_add_attrib(node, 'max_stage', required=False, type=int, default=None,
            help='Maximum backoff stage m.')
_add_attrib(node, 'join_frame', required=False, type=int, default=0,
            help='Frame the node becomes live.')
_add_attrib(node, 'leave_frame', required=False, type=int, default=None,
            help='Frame the node becomes inert.')

# tcp-v1
tcp_root = new_root('tcp-v1')
_add_attrib(tcp_root, 'version', required=True, type=str,
            choices=('tcp-v1',), help='Schema version.')
_add_attrib(tcp_root, 'name', required=False, type=str, default=None,
            help='Scenario name used for run directories.')
_add_attrib(tcp_root, 'capacity_mbps', required=False, type=float,
            default=1.0, help='Bottleneck capacity.')
_add_attrib(tcp_root, 'packet_bytes', required=False, type=int, default=1000,
            help='Packet size.')
_add_attrib(tcp_root, 'base_rtt', required=False, type=float, default=0.1,
            help='Propagation round-trip time in seconds.')
_add_attrib(tcp_root, 'buffer', required=False, type=float, default=None,
            help='Bottleneck buffer in packets; one BDP when omitted.')
_add_attrib(tcp_root, 'c_max', required=False, type=int, default=64,
            help='Largest congestion window.')
_add_attrib(tcp_root, 'total_rounds', required=True, type=int,
            help='Horizon in rounds.')
_add_attrib(tcp_root, 'seed', required=False, type=int, default=0,
            help='Scenario seed.')
flow = _add_elem(tcp_root, 'flows', required=None,
                 help='A flow through the bottleneck.')

_add_attrib(flow, 'id', required=False, type=int, default=None,
            help='Flow id; defaults to the list position.')
_add_attrib(flow, 'controller', required=True, type=str, choices=CONTROLLERS,
            help='Congestion controller.')
_add_attrib(flow, 'start_round', required=False, type=int, default=0,
            help='Round the flow starts sending.')
_add_attrib(flow, 'stop_round', required=False, type=int, default=None,
            help='Round the flow stops sending.')
_add_attrib(flow, 'init_cwnd', required=False, type=float, default=1.0,
            help='Initial congestion window.')
