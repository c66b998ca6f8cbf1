import gradio as gr
import sys
import os

current_dir = os.path.dirname(os.path.abspath(__file__))
src_folder = os.path.join(current_dir, 'src')
sys.path.append(src_folder)


from log_utils import setup_logging
from readme_ui import create_readme_interface
from synth_ui import create_synth_interface
from train_ui import create_train_interface
from eval_ui import create_eval_interface
from demo_ui import create_demo_interface


setup_logging('INFO')

readme_ui = create_readme_interface()
synth_ui = create_synth_interface()
train_ui = create_train_interface()
eval_ui = create_eval_interface()
demo_ui = create_demo_interface()

interfaces = [readme_ui, synth_ui, train_ui, eval_ui, demo_ui]
tab_names = ["Readme", "Generate data", "Train", "Evaluate", "Demo"]

tabbed_interface = gr.TabbedInterface(interface_list=interfaces, tab_names=tab_names)


tabbed_interface.launch()
